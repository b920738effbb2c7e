"""PHM 2012 score of published (actual, predicted) RUL pairs."""
import json
from importlib import resources

from fmme import score_all

doc = json.loads(resources.files("fmme").joinpath("data/phm2012.json").read_text())
rows = doc["published"]["rul"]
report = score_all([(b, r["act"], r["pre"]) for b, r in rows.items()])
for r in report.bearings:
    print("%-11s act %4d pre %4d  err %7.2f%%  score %.4f" % (r.bearing, r.act_rul, r.pre_rul, r.err_percent, r.score))
print("mean score %.4f" % report.score)
