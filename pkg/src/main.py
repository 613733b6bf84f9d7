# SETUP LOGGING
import logging
import logging.config

from settings.logging_config import dict_config

logging.config.dictConfig(dict_config)

# IMPORTS
import asyncio
import sys

import extensions as exts
import workbench as wb

logger = logging.getLogger(__name__)


async def main(argv: list[str] | None = None) -> int:
    async with wb.Workbench(initial_extensions=exts.get_extensions_names()) as workbench:
        return await workbench.start(argv)

if __name__ == '__main__':
    logger.debug('Running main function')
    sys.exit(asyncio.run(main()))
