"""Mine repeated UI structure into templates and emit modular front-end code."""

__version__ = "0.1.0"
