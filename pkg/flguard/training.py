"""
Contrastive refresh: fit selectors and scalers on the training window, then train one encoder per
feature branch.
"""

import logging

import numpy as np

from flguard.assets import FLGuardAssets
from flguard.contrastive import fit_contrastive, init_contrastive_model
from flguard.preprocessing import (
    Scaler,
    fit_low_variance_selector,
    fit_random_selector,
    fit_scaler,
)
from models.experiment import FLGuardHyper
from utils.errors import InsufficientRowsError

logger = logging.getLogger(__name__)


def train_contrastive(
    g_train: np.ndarray,
    hyper: FLGuardHyper,
    rng: np.random.Generator,
    trained_at_round: int = 0,
) -> FLGuardAssets:
    g_train = np.atleast_2d(np.asarray(g_train, dtype=np.float64))
    if g_train.shape[0] < hyper.batch:
        raise InsufficientRowsError(
            f"Contrastive training needs at least {hyper.batch} rows, got {g_train.shape[0]}"
        )

    selector_lv = fit_low_variance_selector(g_train, hyper.feature_dim, hyper.pca_components)
    selector_rd = fit_random_selector(g_train.shape[1], rng, hyper.feature_dim)
    rows_lv = selector_lv.apply(g_train)
    rows_rd = selector_rd.apply(g_train)
    scaler = Scaler(lv=fit_scaler(rows_lv), rd=fit_scaler(rows_rd))

    trained = {}
    for branch, selector, rows in (
        ("lv", selector_lv, scaler.lv.transform(rows_lv)),
        ("rd", selector_rd, scaler.rd.transform(rows_rd)),
    ):
        model = init_contrastive_model(selector.width, rng)
        trained[branch] = fit_contrastive(
            model,
            rows,
            tau=hyper.tau,
            noise_var=hyper.noise_var,
            mask_ratio=hyper.mask_ratio,
            lr=hyper.lr,
            epochs=hyper.epochs,
            batch=hyper.batch,
            rng=rng,
        )

    logger.info(
        f"Contrastive models trained at round {trained_at_round} on {g_train.shape[0]} rows "
        f"(width {selector_lv.width}); final loss lv={trained['lv'][1][-1]:.4f} "
        f"rd={trained['rd'][1][-1]:.4f}"
    )
    return FLGuardAssets(
        model_lv=trained["lv"][0],
        model_rd=trained["rd"][0],
        selector_lv=selector_lv,
        selector_rd=selector_rd,
        scaler=scaler,
        trained_at_round=trained_at_round,
        losses_lv=trained["lv"][1],
        losses_rd=trained["rd"][1],
    )
