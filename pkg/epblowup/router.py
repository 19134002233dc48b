# python
"""
epblowup/router.py
Subcommand router: resolves the run configuration and dispatches to the
handler modules, converting errors into exit codes and run.error events.
"""
import importlib
import logging
import pathlib
from typing import Any, Dict, Mapping, Optional, Tuple

from .config import RunConfig, load_config
from .errors import ConfigError, EpBlowupError
from .runlog import RunSession
from .scenario import ScenarioManager

logger = logging.getLogger(__name__)

COMMANDS: Dict[str, str] = {
    "classify": "classify",
    "scan-r": "scan_r",
    "scan-plane": "scan_plane",
    "phase-portrait": "phase_portrait",
    "crossval": "crossval",
}


class Router:
    def __init__(self, scenarios_root: Optional[pathlib.Path] = None):
        self.scenario_mgr = ScenarioManager(scenarios_root)

    def resolve_config(
        self,
        config_path: Optional[pathlib.Path] = None,
        scenario: Optional[str] = None,
        overrides: Optional[Mapping[str, Mapping[str, Any]]] = None,
    ) -> RunConfig:
        """
        --config wins over --scenario; with neither, the default scenario is
        used when it exists and DEFAULT_CONFIG otherwise.
        """
        if config_path is None and scenario is not None:
            if scenario not in self.scenario_mgr.list_scenarios():
                raise ConfigError(f"unknown scenario {scenario!r}")
        if config_path is None:
            config_path = self.scenario_mgr.get_config_path(scenario)
        return load_config(config_path, overrides=overrides)

    async def dispatch(self, session: RunSession, command: str, config: RunConfig) -> Tuple[int, Dict[str, Any]]:
        """Run one subcommand; returns (exit_code, report)."""
        module = COMMANDS.get(command)
        if module is None:
            await session.log("run.error", "dispatch", error="ConfigError", message=f"unknown command {command}")
            return 1, {"error": f"unknown command {command}"}

        await session.log("run.start", "start", command=command, source=config.source, config=config.to_record())
        try:
            handler = importlib.import_module(f".handlers.{module}", __package__)
            report = await handler.run(session, config)
        except EpBlowupError as exc:
            logger.warning("%s failed: %s", command, exc)
            await session.log(
                "run.error", "error", error=type(exc).__name__, message=str(exc), exit_code=exc.exit_code
            )
            return exc.exit_code, {"error": str(exc), "type": type(exc).__name__}
        except Exception as exc:
            logger.exception("unexpected failure in %s", command)
            await session.log("run.error", "error", error=type(exc).__name__, message=str(exc), exit_code=2)
            return 2, {"error": str(exc), "type": type(exc).__name__}
        return 0, report
