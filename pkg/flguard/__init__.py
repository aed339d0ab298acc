# FLGuard: contrastive update filtering with an ensemble of two feature branches
