# Malicious-update generators (perturbations, gamma searches, model poisoning)
