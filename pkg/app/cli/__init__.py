from app.cli.main import main, run

__all__ = ["main", "run"]
