#!/usr/bin/env python3
# Copyright 2026 The snailkit Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Runs every snailkit command and validates its JSON report against the schema.

usage: validate_reports.py SNAILKIT_EXE SCHEMA DEVICES_DIR
"""

import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema


def main(argv):
    exe, schema_path, devices = argv[1], argv[2], pathlib.Path(argv[3])
    schema = json.loads(pathlib.Path(schema_path).read_text())
    jsonschema.Draft7Validator.check_schema(schema)
    validator = jsonschema.Draft7Validator(schema)
    main_dev = str(devices / "main.toml")

    with tempfile.TemporaryDirectory(prefix="snailkit_reports_") as tmp:
        t = pathlib.Path(tmp)
        (t / "cal.csv").write_text("amp_a,alpha_abs\n0,0.16\n0.1,0.79\n0.2,1.62\n0.3,2.38\n")
        runs = [
            ["potential", "--device", main_dev, "--flux", "0.386"],
            ["sweep", "--device", main_dev, "--points", "51"],
            ["kerr-free", "--device", main_dev],
            ["synth-flux", "--device", main_dev, "--seed", "1", "--csv", str(t / "flux.csv")],
            ["fit-flux", "--in", str(t / "flux.csv")],
            ["synth-splitting", "--device", main_dev, "--seed", "1", "--csv", str(t / "spec.csv")],
            ["fit-splitting", "--device", main_dev, "--in", str(t / "spec.csv")],
            ["synth-t1", "--device", main_dev, "--seed", "1", "--csv", str(t / "t1.csv")],
            ["fit-t1", "--device", main_dev, "--in", str(t / "t1.csv"), "--convention", "auto"],
            ["synth-tls", "--device", main_dev, "--seed", "1", "--csv", str(t / "tls.csv")],
            ["fit-tls", "--device", main_dev, "--in", str(t / "tls.csv")],
            ["fit-calibration", "--device", main_dev, "--in", str(t / "cal.csv")],
            ["budget", "--device", main_dev],
            ["coherence", "--device", main_dev],
            ["report", "--device", main_dev],
            ["report", "--device", str(devices / "supplementary.toml")],
        ]
        failures = 0
        for args in runs:
            proc = subprocess.run([exe, *args], capture_output=True, text=True)
            label = " ".join(args[:1])
            if proc.returncode != 0:
                print(f"FAIL {label}: exit {proc.returncode}: {proc.stderr.strip()}")
                failures += 1
                continue
            report = json.loads(proc.stdout)
            errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
            if errors:
                failures += 1
                for e in errors:
                    print(f"FAIL {label}: {'/'.join(map(str, e.path))}: {e.message}")
            else:
                print(f"ok   {label}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
