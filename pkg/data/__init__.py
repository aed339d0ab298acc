# Dataset synthesis, IDX ingestion, client partitioning and label-flip transforms
