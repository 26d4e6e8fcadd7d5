import logging
import sys
from collections.abc import Sequence

from labelrepair.core.exception_handlers import (
    configuration_error_handler,
    consistency_error_handler,
    file_error_handler,
    global_exception_handler,
    parse_error_handler,
    training_error_handler,
    usage_error_handler,
)
from labelrepair.core.exceptions import (
    ArgumentError,
    CapacityError,
    ConfigurationError,
    ConsistencyError,
    EncodingError,
    ParseError,
    ShapeError,
    StatisticsError,
    TrainingError,
)
from labelrepair.core.routing import CliApp
from labelrepair.core.settings import Settings
from labelrepair.corruption.routes import router as corruption_router
from labelrepair.evaluation.routes import router as evaluation_router
from labelrepair.eventlog.routes import router as eventlog_router
from labelrepair.repairnet.routes import router as repairnet_router

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def create_app() -> CliApp:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr, format=LOG_FORMAT)
    defaults = Settings()
    app = CliApp(title=defaults.APP_NAME, version=defaults.APP_VERSION)

    app.add_exception_handler(ParseError, parse_error_handler)
    app.add_exception_handler(ConsistencyError, consistency_error_handler)
    app.add_exception_handler(EncodingError, consistency_error_handler)
    app.add_exception_handler(ArgumentError, usage_error_handler)
    app.add_exception_handler(CapacityError, usage_error_handler)
    app.add_exception_handler(ConfigurationError, configuration_error_handler)
    app.add_exception_handler(ShapeError, configuration_error_handler)
    app.add_exception_handler(TrainingError, training_error_handler)
    app.add_exception_handler(StatisticsError, training_error_handler)
    app.add_exception_handler(OSError, file_error_handler)
    app.add_exception_handler(Exception, global_exception_handler)

    app.include_router(eventlog_router)
    app.include_router(corruption_router)
    app.include_router(repairnet_router)
    app.include_router(evaluation_router)
    return app


def main(argv: Sequence[str] | None = None) -> int:
    return create_app().run(argv)
