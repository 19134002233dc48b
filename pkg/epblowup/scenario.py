from pathlib import Path
from typing import List, Optional


class ScenarioManager:
    """
    Locate shipped run configurations under a scenarios root.

    Layout:
      scenarios/{scenario_id}/run.conf
      scenarios/{scenario_id}/README (optional, free text)

    Public API:
      get_config_path(scenario_id) -> Path | None
      read_config(scenario_id) -> str | None
      list_scenarios() -> list[str]
    """

    def __init__(self, scenarios_root: Optional[Path] = None):
        default_root = Path(__file__).resolve().parents[1] / "scenarios"
        self.scenarios_root = Path(scenarios_root or default_root).resolve()

    def _scenario_dir(self, scenario_id: str) -> Path:
        return self.scenarios_root / scenario_id

    def get_config_path(self, scenario_id: Optional[str]) -> Optional[Path]:
        """
        Return run.conf for the scenario, falling back to the 'default'
        scenario. Returns None if neither exists.
        """
        candidates = []
        if scenario_id:
            candidates.append(self._scenario_dir(scenario_id) / "run.conf")
        candidates.append(self._scenario_dir("default") / "run.conf")

        for p in candidates:
            try:
                if p.is_file():
                    return p
            except OSError:
                continue
        return None

    def read_config(self, scenario_id: Optional[str]) -> Optional[str]:
        path = self.get_config_path(scenario_id)
        if path is None:
            return None
        try:
            return path.read_text(encoding="utf-8")
        except OSError:
            return None

    def list_scenarios(self) -> List[str]:
        if not self.scenarios_root.is_dir():
            return []
        return sorted(p.name for p in self.scenarios_root.iterdir() if (p / "run.conf").is_file())
