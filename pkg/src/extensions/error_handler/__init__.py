import workbench as wb

from .error_handler import ErrorHandler


async def setup(workbench: wb.Workbench) -> None:
    await workbench.add_group(ErrorHandler(workbench))
