# Experiment orchestration: federation loop, attacks, metrics, reports
