import asyncio
import logging

from steinloss.cli import BUNDLED_FIXTURE
from steinloss.config import get_settings
from steinloss.domination import run_conditions
from steinloss.model_selection import LinearModelData, select
from steinloss.presets import get_preset
from steinloss.risk_engine import theta_sweep
from steinloss.utils import add_async_job

PRESET = "johnstone-js"
REPLICATIONS = 20_000


async def main():
    logging.getLogger().setLevel(logging.DEBUG)
    logging.debug("Demo started")

    config = get_preset(PRESET).with_overrides(n=REPLICATIONS)
    run = config.resolved(get_settings())

    # Grid checks and the Monte Carlo sweep run side by side on the default executor
    conditions = add_async_job(run_conditions, config.conditions, config.grid)
    sweep = add_async_job(theta_sweep, config, run)

    for spec, report in zip(config.conditions, await conditions):
        logging.debug(
            "\t%s: passed=%s max_lhs=%.4g %s",
            spec.display_name,
            report.passed,
            report.max_lhs,
            report.constants,
        )

    logging.debug("Risks of %s (n=%s, seed=%s):", config.name, run.n, run.seed)
    for report in await sweep:
        if report.is_paired:
            logging.debug(
                "\t|theta|=%g %s - %s = %.4g ± %.3g",
                report.theta_norm,
                report.loss_estimator,
                report.reference,
                report.paired_diff_mean,
                report.paired_diff_se,
            )
        else:
            logging.debug(
                "\t|theta|=%g %s risk %.4g ± %.3g",
                report.theta_norm,
                report.loss_estimator,
                report.mean,
                report.std_error,
            )

    # Cp* on the bundled regression data
    selection = select(LinearModelData.from_csv(BUNDLED_FIXTURE), [0.0, 0.1, 1.0, 10.0])
    logging.debug("Cp* table:\n%s", selection.table.to_string(index=False))
    logging.debug("Chosen lambda: %s", selection.chosen_lambda)


if __name__ == "__main__":
    logging.basicConfig()
    asyncio.run(main())
