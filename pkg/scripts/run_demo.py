#!/usr/bin/env python3
"""Run the shipped demo sweep and print the report plus convergence verdict.

Equivalent to `gap-predict eval --config configs/demo.json --out reports`,
kept as a plain script for interactive experimentation.
"""

import os
import sys

from gap_predict.harness import (ExperimentConfig, convergence_check,
                                 run_sweep, write_reports)

HERE = os.path.dirname(os.path.abspath(__file__))


def main():
    config_path = sys.argv[1] if len(sys.argv) > 1 else \
        os.path.join(HERE, "..", "configs", "demo.json")
    config = ExperimentConfig.from_json(config_path)
    rows = run_sweep(config)
    out_dir = os.path.join(HERE, "..", "reports")
    write_reports(rows, out_dir, config)
    print(f"{'spec':<12}{'d':>4}{'nu':>7}{'eps1':>12}{'eps2':>12}"
          f"{'sup_err':>12}{'bound':>12}  status")
    for row in rows:
        if row.error:
            print(f"{row.spec:<12}{row.d:>4}{row.nu:>7.3g}  ERROR {row.error}")
            continue
        bound = row.bound_tones if row.bound_tones else row.bound_paper
        status = "pass" if row.passed else "FAIL"
        print(f"{row.spec:<12}{row.d:>4}{row.nu:>7.3g}{row.eps1:>12.4e}"
              f"{row.eps2:>12.4e}{row.sup_err:>12.4e}{bound:>12.4e}  {status}")
    verdict = convergence_check(rows)
    print("convergence check:", "pass" if verdict.passed else verdict.failures)
    print(f"reports written to {os.path.normpath(out_dir)}")
    return 0 if all(r.passed for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
