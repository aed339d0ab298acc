# Baseline byzantine-robust aggregation rules and the defense interface
