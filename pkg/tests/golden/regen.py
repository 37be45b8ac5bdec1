"""Rewrite the golden plane image and layout (run only after an intended format change)."""

from pathlib import Path

from camcim import config, harness

HERE = Path(__file__).parent

cfg = config.load(HERE / "small_config.json")
plane, layout, _ = harness.functional_plane(cfg)
(HERE / "small_plane.img").write_bytes(plane.to_bytes())
(HERE / "small_layout.json").write_text(layout.to_json())
