#!/usr/bin/env python3
"""Solve CPLEX-LP files with HiGHS and print one line per file:

    <path> <status> <objective>

Exit code 0 when every file was read, 2 when HiGHS is not importable.
"""

import sys


def main(paths):
    try:
        import highspy
    except ImportError:
        print("highspy not available", file=sys.stderr)
        return 2
    rc = 0
    for path in paths:
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("mip_rel_gap", 1e-10)
        h.setOptionValue("mip_abs_gap", 1e-12)
        h.setOptionValue("primal_feasibility_tolerance", 1e-9)
        h.setOptionValue("mip_feasibility_tolerance", 1e-9)
        if h.readModel(path) != highspy.HighsStatus.kOk:
            print(f"{path} read-error nan")
            rc = 1
            continue
        h.run()
        status = h.modelStatusToString(h.getModelStatus()).lower().replace(" ", "-")
        obj = h.getInfo().objective_function_value
        print(f"{path} {status} {obj:.17g}")
    return rc


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
