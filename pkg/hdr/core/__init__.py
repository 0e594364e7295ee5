"""Settings, logging, enums, constants and sparse linear algebra."""
