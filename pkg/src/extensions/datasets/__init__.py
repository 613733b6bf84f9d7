import workbench as wb

from .datasets import Datasets


async def setup(workbench: wb.Workbench) -> None:
    await workbench.add_group(Datasets(workbench))
