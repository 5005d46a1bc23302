"""
The operator's tuning loop
==========================

The balance between statistical usability and disclosure risk is assessed
operationally: run the analyses your users will run on both versions of the
data, and follow the records you are worried about.  Adjust eps / q / weights
and repeat.
"""

import numpy as np

import nbrmask as nm

# synthetic employee file with a known wage model
n = 5000
rng = np.random.default_rng(7)
age = rng.uniform(22.0, 65.0, n)
sex = rng.choice(["1", "2"], n).astype(object)
weeks = rng.uniform(0.0, 52.0, n)
wage = 450.0 * age - 9000.0 * (sex == "2") + 1300.0 * weeks + rng.normal(0, 5000, n)

# plant exactly one young high-earning woman (the record most at risk)
age[7] = 27.4
sex[7] = "2"
wage[7] = 100_000.0
age[(age < 31) & (sex == "2") & (np.arange(n) != 7)] += 15.0

d = nm.Dataset(
    [nm.ColumnSpec("age", nm.CONTINUOUS),
     nm.ColumnSpec("sex", nm.CATEGORICAL, ("1", "2")),
     nm.ColumnSpec("wkswrkd", nm.CONTINUOUS),
     nm.ColumnSpec("wage", nm.CONTINUOUS)],
    [age, sex, weeks, wage])

model = nm.RegressionSpec("wage", ("age", "sex", "wkswrkd"))
rare = nm.RecordPredicate.parse("sex=2,age<31")
print("rare-record query matches rows:", nm.query(d, rare))

for eps, sex_weight in ((0.3, 0.2), (0.6, 0.3)):
    params = nm.MaskingParams(mode=nm.EpsBall(eps), q=1.0,
                              weights=nm.WeightSpec({"sex": sex_weight}),
                              seed=42)
    masked = nm.mask(d, params)
    s = masked.summary()
    print(f"\n=== eps={eps}, weight(sex)={sex_weight} ===")
    print(f"resampled {s.resampled}, suppressed {s.suppressed}, "
          f"median |S| {s.median_donor_count:g}")

    # (a) utility: how far did the regression move?
    print(nm.compare_regression(d, masked.released, model).to_text())

    # (b) risk: what happened to the planted record?
    report = nm.track(d, masked, rare)
    print(report.to_text())

# presence disclosure is a different harm: if a unique label survives
# anywhere in the release, an intruder learns that someone with it is in the
# data at all, no matter whose record carries it now
places = rng.choice(["US", "MX", "CN"], n).astype(object)
places[1234] = "Tonga"
d2 = nm.Dataset(
    list(d.schema) + [nm.ColumnSpec("birthplace", nm.CATEGORICAL,
                                    ("CN", "MX", "Tonga", "US"))],
    list(d.columns) + [places])
masked2 = nm.mask(d2, nm.MaskingParams(mode=nm.EpsBall(0.6), q=1.0, seed=42,
                                       weights=nm.WeightSpec({"birthplace": 0.2})))
print("\n" + nm.presence_check(d2, masked2, "birthplace", "Tonga").to_text())
