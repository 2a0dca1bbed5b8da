"""End-to-end command-line workflow in a temporary directory.

construct -> sample data against the written covariance -> estimate,
plus a simulate run from the bundled INI config.  Exit codes: 0 success,
1 usage error, 2 certification failure, 3 runtime failure.
"""

import tempfile
from pathlib import Path

import numpy as np

from sharplasso.cli import main
from sharplasso.matrixio import read_matrix_csv
from sharplasso.models import build_model, sample

work = Path(tempfile.mkdtemp(prefix="sharplasso_demo_"))
print("working in", work)

# 1. build and certify an instance; four CSVs land in the directory
code = main(["construct", "direct", "--p", "50",
             "--out-dir", str(work / "instance")])
print("construct exit code:", code)

# 2. sample synthetic data from the written covariance
model = build_model(read_matrix_csv(work / "instance" / "sigma.csv"))
data = sample(model, 400, np.zeros(model.p), seed=99)
np.savetxt(work / "x.csv", data.x, delimiter=",")
np.savetxt(work / "y.csv", data.y, delimiter=",")

# 3. debiased estimate with the known covariance and the written surrogate
pair_values = (work / "instance" / "pair.csv").read_text().splitlines()[1]
lambda_sharp = pair_values.split(",")[0]
code = main(["estimate", "--x", str(work / "x.csv"),
             "--y", str(work / "y.csv"),
             "--sigma", str(work / "instance" / "sigma.csv"),
             "--gamma-sharp", str(work / "instance" / "gamma_sharp.csv"),
             "--lambda-sharp", lambda_sharp])
print("estimate exit code:", code)

# 4. a config-driven Monte Carlo run with the lemma audits switched on
config = work / "experiment.ini"
config.write_text(Path(__file__).with_name("experiment.ini").read_text())
code = main(["simulate", str(config), "--audit",
             "--out-dir", str(work / "report")])
print("simulate exit code:", code)
print("report files:", sorted(p.name for p in (work / "report").iterdir()))
