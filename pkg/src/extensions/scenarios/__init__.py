import workbench as wb

from .scenarios import Scenarios


async def setup(workbench: wb.Workbench) -> None:
    await workbench.add_group(Scenarios(workbench))
