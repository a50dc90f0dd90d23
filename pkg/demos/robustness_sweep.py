"""How many views does the labeler actually need?

Aggregates the standard fixture from progressively fewer cameras and
reports label agreement against the full 24-view assignment, plus the
median aggregation wall time. Fewer views means faster and less
consistent; the sweep quantifies both.

    python3 demos/robustness_sweep.py
"""

import splatseg as ss

spec = ss.standard_spec()
scene, gt = ss.generate_scene(spec)
views = ss.generate_orbit(spec)
masks = ss.generate_gt_masks(scene, gt, views)

sizes = [24, 12, 6, 3, 1]
rows = ss.robustness_experiment(scene, views, masks, sizes, seed=0, reps=5)

print(f"{'views':>5}  {'agreement':>9}  {'median ms':>9}")
for row in rows:
    print(f"{row.subset_size:>5}  {row.agreement:>9.3f}  {row.median_ms:>9.1f}")

print("\nagreement is measured against the full 24-view labeling;")
print("the 24-view row is the identity check and must be exactly 1.0")
