"""
Demo script for the magnetic tunneling toolkit: the (2, 1) ellipse end to end
"""

import asyncio

import numpy as np

from src.models.schemas import GapNormalization, HGridConfig, OracleConfig, RunConfig
from src.services.pipeline import PipelineService
from src.services.splitting import SplittingCalculator


def demo_constants(pipeline: PipelineService):
    """de Gennes constants"""
    print("📐 Demo: de Gennes Constants")
    print("=" * 50)

    consts = pipeline.constants()
    print(f"   Theta0 = {consts.theta0:.10f}")
    print(f"   xi0    = {consts.xi0:.10f}  (xi0^2 - Theta0 = {consts.xi0 ** 2 - consts.theta0:.2e})")
    print(f"   C1     = {consts.c1:.10f}")
    print(f"   mu''   = {consts.mu2:.10f}")


def demo_geometry(pipeline: PipelineService):
    """Wells, actions and prefactors"""
    print("\n🥚 Demo: Boundary Geometry")
    print("=" * 50)

    summary = pipeline.domain_summary()
    print(f"   half-perimeter L = {summary.L:.10f}")
    print(f"   wells at s = {summary.s_r:.6f}, {summary.s_l:.6f} (kappa_max = {summary.kappa_max:.6f})")
    print(f"   k2 = {summary.k2:.6f}, g = {summary.g:.6f}")
    print(f"   S_u = {summary.S_u:.10f}, S_d = {summary.S_d:.10f}")
    print(f"   A_u = {summary.A_u:.10f}, A_d = {summary.A_d:.10f}")
    print(f"   gamma0 = {summary.gamma0:.10f}")


def demo_prediction(pipeline: PipelineService):
    """Oscillating gap and its zeros"""
    print("\n📉 Demo: Gap Prediction")
    print("=" * 50)

    calculator = SplittingCalculator(pipeline.splitting_inputs(alpha0=0.0))
    hs = 1.0 / np.linspace(100.0, 1000.0, 7)
    prediction = calculator.predict(hs, GapNormalization.PHYSICAL)
    for h, gap, envelope in zip(prediction.h, prediction.gap_formula, prediction.envelope):
        print(f"   1/h = {1.0 / h:7.1f}   gap = {gap:.4e}   envelope = {envelope:.4e}")

    zeros = calculator.predicted_zeros(100.0, 110.0)
    print(f"   {zeros.size} zeros in 1/h in [100, 110], mean spacing {np.mean(np.diff(zeros)):.6f}")
    print(f"   harmonic ladder at h=0.01: {calculator.harmonic_levels(0.01, 3)}")


async def demo_sweep(pipeline: PipelineService):
    """Prediction against the effective operator"""
    print("\n🔬 Demo: Effective-Operator Oracle")
    print("=" * 50)

    config = RunConfig(
        hgrid=HGridConfig(min=5e-4, max=2e-3, count=8),
        oracles=OracleConfig(effective1d=True, boundary2d=False, effective_flux=True),
    )
    result = await PipelineService(config, constants=pipeline.constants()).run_sweep()
    columns = ["inv_h", "gap_formula", "gap_effective", "rel_err_effective"]
    print(result.table[columns].to_string(index=False, float_format=lambda v: f"{v:.4e}"))

    report = result.comparisons.get("effective1d")
    if report is not None:
        print(f"   median |log ratio| = {report.median_log_rel_err:.3e}")
        if report.fitted_rate is not None:
            print(f"   fitted rate = {report.fitted_rate:.6f} (S = {result.inputs.S:.6f})")


def demo_system_status(pipeline: PipelineService):
    """Stage status"""
    print("\n🏥 Demo: System Status")
    print("=" * 50)

    status = pipeline.get_system_status()
    print(f"Overall Status: {status['status']}")
    for component, health in status.get('components', {}).items():
        print(f"   {component}: {health}")


async def main():
    """Main demo function"""
    print("🚀 Magnetic Tunneling Toolkit Demo")
    print("=" * 60)

    pipeline = PipelineService()
    try:
        demo_constants(pipeline)
        demo_geometry(pipeline)
        demo_prediction(pipeline)
        await demo_sweep(pipeline)
        demo_system_status(pipeline)

        print("\n✅ Demo completed successfully!")
        print("\nNext steps:")
        print("1. python main.py validate --full")
        print("2. python main.py sweep --config data/configs/ellipse_sweep.txt")

    except Exception as e:
        print(f"\n❌ Demo failed with error: {str(e)}")
        print("Please check your setup and try again")


if __name__ == "__main__":
    asyncio.run(main())
