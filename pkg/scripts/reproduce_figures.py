#!/usr/bin/env python3
"""
Quantized Power Codebook - Figure Reproduction Script
Re-runs the reference scenarios and checks the capacity gaps
"""

import argparse
import logging
import os
import sys
import time

from dotenv import load_dotenv

# Add parent directory to path to import the package
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

# Load environment variables
load_dotenv()

from config import get_config
from quantpower import (
    ConstraintSet,
    QuantizedRule,
    SolverSettings,
    allocate_full_csi,
    capacity_loss_pct,
    db_to_linear,
    estimate_capacity,
    sample_training_set,
    solve_quantized,
    transition_matrix,
)
from quantpower.evaluation import FullCsiRule

WIDEBAND_Q_DB = (-10.0, -5.0, 0.0, 5.0)


# Colors for terminal output
class Colors:
    GREEN = "\033[0;32m"
    RED = "\033[0;31m"
    YELLOW = "\033[1;33m"
    BLUE = "\033[0;34m"
    NC = "\033[0m"  # No Color


def print_success(message):
    print(f"{Colors.GREEN}✓ {message}{Colors.NC}")


def print_error(message):
    print(f"{Colors.RED}✗ {message}{Colors.NC}")


def print_warning(message):
    print(f"{Colors.YELLOW}⚠  {message}{Colors.NC}")


def print_info(message):
    print(f"{Colors.BLUE}{message}{Colors.NC}")


class Scenario:
    """Shared sample sets and settings for one band count"""

    def __init__(self, M, N, seed, settings):
        self.M = M
        self.settings = settings
        self.training = sample_training_set(None, M, N, seed)
        self.evaluation = sample_training_set(None, M, N, seed + 1)

    def constraints(self, P_dB, Q_dB):
        return ConstraintSet(P_avg=db_to_linear(P_dB), Q_avg=tuple(db_to_linear(q) for q in Q_dB))

    def full_csi(self, constraints):
        solution = allocate_full_csi(constraints, self.training, self.settings)
        return estimate_capacity(self.evaluation, FullCsiRule(solution.duals))

    def quantized(self, method, constraints, B, q_f=0.0):
        channel = transition_matrix(B, q_f) if method == "gla2" else None
        started = time.perf_counter()
        solution = solve_quantized(method, constraints, self.training, 2**B, self.settings, channel)
        elapsed = time.perf_counter() - started
        return estimate_capacity(self.evaluation, QuantizedRule.from_solution(solution)), elapsed


def check_gap(label, measured, expected, margin, errors):
    if abs(measured - expected) <= margin:
        print_success(f"{label}: {measured:.2f}% (reference {expected:.2f}% ± {margin})")
    else:
        print_error(f"{label}: {measured:.2f}% (reference {expected:.2f}% ± {margin})")
        errors.append(label)


def reproduce(N, seed, settings):
    """Main reproduction function"""

    print_info("=" * 50)
    print_info("  Quantized Power Codebook Reproduction")
    print_info("=" * 50)
    print()

    errors = []
    warnings = []
    narrow = Scenario(1, N, seed, settings)
    wide = Scenario(4, N, seed, settings)

    # Test 1: Narrowband GLA loss versus full CSI
    print_info("Test 1: Narrowband capacity loss (Q_avg=-5 dB, P_avg=10 dB)")
    constraints = narrow.constraints(10.0, (-5.0,))
    reference = narrow.full_csi(constraints)
    for B, expected in ((1, 21.23), (2, 6.21), (3, 1.62)):
        capacity, _ = narrow.quantized("gla", constraints, B)
        check_gap(f"B={B} loss", capacity_loss_pct(reference, capacity), expected, 2.5, errors)
    print()

    # Test 2: Three bits stay close to full CSI
    print_info("Test 2: B=3 within 3% of full CSI")
    for Q_dB in (-5.0, 0.0):
        for P_dB in (0.0, 5.0, 10.0):
            constraints = narrow.constraints(P_dB, (Q_dB,))
            loss = capacity_loss_pct(narrow.full_csi(constraints), narrow.quantized("gla", constraints, 3)[0])
            if loss < 3.0:
                print_success(f"Q={Q_dB} dB, P={P_dB} dB: loss {loss:.2f}%")
            else:
                print_error(f"Q={Q_dB} dB, P={P_dB} dB: loss {loss:.2f}%")
                errors.append(f"B=3 gap at Q={Q_dB}, P={P_dB}")
    print()

    # Test 3: AQPA against GLA on four bands
    print_info("Test 3: AQPA vs GLA (M=4, P_avg=15 dB)")
    constraints = wide.constraints(15.0, WIDEBAND_Q_DB)
    for B, expected in ((2, 8.38), (3, 3.12), (4, 1.42)):
        gla, gla_time = wide.quantized("gla", constraints, B)
        aqpa, aqpa_time = wide.quantized("aqpa", constraints, B)
        check_gap(f"B={B} AQPA loss", capacity_loss_pct(gla, aqpa), expected, 1.5, errors)
        if B == 4:
            speedup = gla_time / max(aqpa_time, 1e-9)
            if speedup >= 5.0:
                print_success(f"AQPA speed-up at B=4: {speedup:.1f}x")
            else:
                print_warning(f"AQPA speed-up at B=4: {speedup:.1f}x (expected >= 5x)")
                warnings.append("AQPA speed-up")
    print()

    # Test 4: Noisy feedback degradation
    print_info("Test 4: Noisy feedback loss (M=4, P_avg=10 dB)")
    constraints = wide.constraints(10.0, WIDEBAND_Q_DB)
    for B, reference in ((3, {0.01: 3.843, 0.1: 17.394}), (2, {0.01: 4.769, 0.1: 18.783})):
        noiseless, _ = wide.quantized("gla", constraints, B)
        for q_f, expected in reference.items():
            noisy, _ = wide.quantized("gla2", constraints, B, q_f)
            check_gap(f"B={B}, q_f={q_f} loss", capacity_loss_pct(noiseless, noisy), expected, 2.0, errors)
    print()

    # Test 5: Inactive interference constraints and saturation
    print_info("Test 5: Low-power coincidence and high-power saturation (M=4, B=2)")
    q_vectors = (WIDEBAND_Q_DB, (-5.0,) * 4, (0.0,) * 4, (5.0,) * 4)
    low = [wide.quantized("gla", wide.constraints(-5.0, q), 2)[0].value for q in q_vectors]
    spread = 100.0 * (max(low) - min(low)) / max(low)
    if spread < 1.0:
        print_success(f"Curves coincide at P_avg=-5 dB (spread {spread:.2f}%)")
    else:
        print_error(f"Curves differ at P_avg=-5 dB (spread {spread:.2f}%)")
        errors.append("Low-power coincidence")
    for q in q_vectors:
        c25 = wide.quantized("gla", wide.constraints(25.0, q), 2)[0].value
        c30 = wide.quantized("gla", wide.constraints(30.0, q), 2)[0].value
        change = 100.0 * abs(c30 - c25) / c25
        if change < 0.5:
            print_success(f"Q={q}: saturated ({change:.2f}% between 25 and 30 dB)")
        else:
            print_error(f"Q={q}: still growing ({change:.2f}% between 25 and 30 dB)")
            errors.append(f"Saturation for Q={q}")
    print()

    # Summary
    print_info("=" * 50)
    print_info("  Reproduction Summary")
    print_info("=" * 50)
    print()

    if errors:
        print_error(f"Found {len(errors)} failed checks:")
        for error in errors:
            print(f"  • {error}")
        print()

    if warnings:
        print_warning(f"Found {len(warnings)} warnings:")
        for warning in warnings:
            print(f"  • {warning}")
        print()

    if not errors:
        print_success("All reproduction checks passed!")
        print()
        return True
    print_error("Reproduction failed - see checks above")
    print()
    return False


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--profile", choices=["full", "quick"], help="Configuration profile")
    parser.add_argument("--seed", type=int, help="Training seed (evaluation uses seed + 1)")
    args = parser.parse_args()

    cfg = get_config(args.profile)
    logging.basicConfig(
        level=getattr(logging, cfg.LOG_LEVEL, logging.WARNING),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    success = reproduce(cfg.N_TRAIN, args.seed if args.seed is not None else cfg.SEED, SolverSettings.from_config(cfg))
    sys.exit(0 if success else 1)
