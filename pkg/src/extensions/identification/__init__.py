import workbench as wb

from .identification import Identification


async def setup(workbench: wb.Workbench) -> None:
    await workbench.add_group(Identification(workbench))
