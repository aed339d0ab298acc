# Dense network engine used for global, surrogate and contrastive models
