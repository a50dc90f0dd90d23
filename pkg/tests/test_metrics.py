import numpy as np
import pytest

import oracles
import splatseg as ss
from splatseg.errors import ContractError

TOL = 1e-9


def grid(rows):
    return np.array(rows, np.uint16)


def crafted_pairs():
    """Ten mask pairs with hand-computed scores."""
    pairs = []

    # 1. identical single instance
    a = np.zeros((10, 10), np.uint16)
    a[2:7, 2:7] = 1
    pairs.append(("identical", a, a.copy(), 1.0, 1.0))

    # 2. empty prediction vs a 25 px object in a 100 px image
    gt = np.zeros((10, 10), np.uint16)
    gt[0:5, 0:5] = 1
    pairs.append(("all-background pred", np.zeros((10, 10), np.uint16), gt, 0.0, 0.75))

    # 3. half-overlapping 10x10 squares: inter 50, union 150
    pred = np.zeros((10, 20), np.uint16)
    gt = np.zeros((10, 20), np.uint16)
    pred[:, 0:10] = 1
    gt[:, 5:15] = 1
    pairs.append(("one-third iou", pred, gt, 1.0 / 3.0, 100.0 / 200.0))

    # 4. pred covers everything, gt covers half: iou 0.5, acc 0.5
    pred = np.full((8, 8), 2, np.uint16)
    gt = np.zeros((8, 8), np.uint16)
    gt[:4] = 2
    pairs.append(("over-segmentation", pred, gt, 0.5, 0.5))

    # 5. two instances, one perfect and one missed: miou (1+0)/2
    pred = grid([[1, 1, 0, 0]])
    gt = grid([[1, 1, 2, 2]])
    pairs.append(("one of two found", pred, gt, 0.5, 0.5))

    # 6. swapped labels, id matching scores them as misses
    pred = grid([[1, 1, 2, 2]])
    gt = grid([[2, 2, 1, 1]])
    pairs.append(("swapped ids", pred, gt, 0.0, 0.0))

    # 7. quarter overlap per instance: each inter 1, union 7
    pred = grid([[1, 1, 0, 2, 2, 0], [1, 1, 0, 2, 2, 0]])
    gt = grid([[0, 1, 1, 0, 2, 2], [0, 1, 1, 0, 2, 2]])
    pairs.append(("offset pair", pred, gt, 2.0 / 6.0, 4.0 / 12.0))

    # 8. pred adds a spurious instance absent from gt: gt ids still perfect
    pred = grid([[1, 1, 3, 0]])
    gt = grid([[1, 1, 0, 0]])
    pairs.append(("spurious extra id", pred, gt, 1.0, 0.75))

    # 9. single shared pixel: inter 1, union 9
    pred = np.zeros((5, 5), np.uint16)
    gt = np.zeros((5, 5), np.uint16)
    pred[0, 0:5] = 4
    gt[0:5, 0] = 4
    pairs.append(("cross", pred, gt, 1.0 / 9.0, 17.0 / 25.0))

    # 10. background-only on both sides: macc 1, empty-gt convention
    pairs.append(("both empty", np.zeros((4, 4), np.uint16),
                  np.zeros((4, 4), np.uint16), 0.0, 1.0))

    return pairs


@pytest.mark.parametrize("name,pred,gt,miou,macc",
                         crafted_pairs(), ids=[p[0] for p in crafted_pairs()])
def test_crafted_pairs_match_hand_scores(name, pred, gt, miou, macc):
    m = ss.compute_metrics(pred, gt)
    assert m.miou == pytest.approx(miou, abs=TOL)
    assert m.macc == pytest.approx(macc, abs=TOL)
    ref = oracles.seg_metrics(pred, gt)
    assert m.macc == pytest.approx(ref[1], abs=TOL)
    if not m.empty_gt:  # miou under empty gt is a convention, not a score
        assert m.miou == pytest.approx(ref[0], abs=TOL)


def test_per_instance_breakdown():
    pred = grid([[1, 1, 0, 0]])
    gt = grid([[1, 1, 2, 2]])
    m = ss.compute_metrics(pred, gt)
    assert m.per_instance_iou == {1: pytest.approx(1.0), 2: pytest.approx(0.0)}


def test_empty_gt_flag():
    m = ss.compute_metrics(grid([[1, 0]]), grid([[0, 0]]))
    assert m.empty_gt and m.per_instance_iou == {}
    assert not ss.compute_metrics(grid([[1, 0]]), grid([[1, 0]])).empty_gt


def test_hungarian_matching_repairs_swapped_ids():
    pred = grid([[1, 1, 2, 2]])
    gt = grid([[2, 2, 1, 1]])
    by_id = ss.compute_metrics(pred, gt)
    matched = ss.compute_metrics(pred, gt, matching="hungarian")
    assert by_id.miou == pytest.approx(0.0, abs=TOL)
    assert matched.miou == pytest.approx(1.0, abs=TOL)
    assert matched.macc == by_id.macc  # accuracy stays label-faithful


def test_hungarian_never_reuses_a_prediction():
    # two gt instances, one matching pred blob: only one gt id can claim it
    pred = grid([[5, 5, 5, 5]])
    gt = grid([[1, 1, 2, 2]])
    m = ss.compute_metrics(pred, gt, matching="hungarian")
    assert sorted(m.per_instance_iou.values()) == [
        pytest.approx(0.0, abs=TOL), pytest.approx(0.5, abs=TOL)]


def test_unknown_matching_rejected():
    with pytest.raises(ContractError, match="matching"):
        ss.compute_metrics(grid([[0]]), grid([[0]]), matching="overlap")


def test_shape_mismatch_rejected():
    with pytest.raises(ContractError, match="shapes"):
        ss.compute_metrics(np.zeros((4, 4), np.uint16), np.zeros((4, 5), np.uint16))


def test_to_dict_round_trip():
    m = ss.compute_metrics(grid([[1, 1, 0, 0]]), grid([[1, 1, 2, 2]]))
    d = m.to_dict()
    assert d["miou"] == pytest.approx(0.5, abs=TOL)
    assert d["per_instance_iou"]["2"] == pytest.approx(0.0, abs=TOL)
    assert d["empty_gt"] is False
