import numpy as np
import pytest

from triageval.data_model import Cohort, CohortRecord

# Hand-enumerable reference dataset: positives {0.9, 0.8, 0.7, 0.3},
# negatives {0.6, 0.4, 0.2, 0.1, 0.05, 0.0}. AUC 22/24 by pair counting.
D1_POS = [0.9, 0.8, 0.7, 0.3]
D1_NEG = [0.6, 0.4, 0.2, 0.1, 0.05, 0.0]


@pytest.fixture
def d1():
    scores = np.array(D1_POS + D1_NEG)
    labels = np.array([True] * len(D1_POS) + [False] * len(D1_NEG))
    return scores, labels


@pytest.fixture
def d1_cohort():
    records = []
    for i, s in enumerate(D1_POS):
        records.append(CohortRecord(id=f"p{i}", bac_label=True, scores={"prod": s}))
    for i, s in enumerate(D1_NEG):
        records.append(CohortRecord(id=f"n{i}", bac_label=False, scores={"prod": s}))
    return Cohort(records, ["prod"])
