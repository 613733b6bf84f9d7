import workbench as wb

from .calibration import Calibration


async def setup(workbench: wb.Workbench) -> None:
    await workbench.add_group(Calibration(workbench))
