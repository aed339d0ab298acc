# IDX magic numbers (big-endian u32): 0x00000801 labels, 0x00000803 images
IDX_LABEL_MAGIC = 2049
IDX_IMAGE_MAGIC = 2051

# Contrastive feature width; selectors keep this many coordinates (or all when d is smaller)
FEATURE_DIM = 3072

# Report schema, exact column order
CSV_COLUMNS = [
    "round",
    "acc",
    "n_selected",
    "tp",
    "fp",
    "tn",
    "fn",
    "f1",
    "fallback",
    "wall_ms",
]

# Attack kinds by capability
MODEL_ATTACKS = {"lie", "min_max", "min_sum", "sf"}
AGR_AWARE_ATTACKS = {"stat_opt", "dyn_opt", "adaptive"}
DATA_ATTACKS = {"slf", "dlf"}

# Threat model -> (knows benign updates, knows AGR, capability)
THREAT_MODELS = {
    "T1": (True, True, "model"),
    "T2": (False, True, "model"),
    "T3": (True, False, "model"),
    "T4": (False, False, "model"),
    "T5": (False, False, "data"),
}

# Threat model -> attack kinds it can mount
THREAT_MODEL_LEGALITY = {
    "T1": MODEL_ATTACKS | AGR_AWARE_ATTACKS,
    "T2": MODEL_ATTACKS | AGR_AWARE_ATTACKS,
    "T3": set(MODEL_ATTACKS),
    "T4": set(MODEL_ATTACKS),
    "T5": set(DATA_ATTACKS),
}

# Dimension-wise rules; every other defense picks a subset of clients
DIMENSION_DEFENSES = {"fed_avg", "trimmed_mean"}

SWEEP_AXES = ("malicious_fraction", "q", "k")

# gamma search floor shared by STAT-OPT / DYN-OPT / Min-Max / Min-Sum
GAMMA_FLOOR = 1e-6
