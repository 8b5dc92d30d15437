#!/usr/bin/env python3
"""
Health check script for qfrac
Returns exit code 0 if the numerical stack is healthy, 1 if not
"""

import sys
from pathlib import Path

# Add the src directory to the path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from qfrac import QMatrix, __version__, frac_power_neg, opnorm


def check_health() -> int:
    """Compute Id^-1/2 and diag(4)^-1/2 and compare with the exact values."""
    try:
        identity = frac_power_neg(QMatrix.identity(2), 0.5)
        scalar = frac_power_neg(QMatrix.diag([4.0]), 0.5)
        errors = {
            "identity": opnorm(identity.matrix - QMatrix.identity(2)),
            "scalar": abs(scalar.matrix.entry(0, 0) - 0.5),
        }
        if all(e <= 1e-9 for e in errors.values()):
            print("✅ qfrac is healthy")
            print(f"   Version: {__version__}")
            print(f"   Evaluations: {identity.report.evaluations + scalar.report.evaluations}")
            return 0
        print("❌ Fractional powers are off:", errors)
        return 1

    except Exception as e:
        print(f"❌ Health check failed: {e}")
        return 1


def main():
    """Run health check and exit with appropriate code."""
    sys.exit(check_health())


if __name__ == "__main__":
    main()
