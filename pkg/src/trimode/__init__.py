from trimode.main import main

__all__ = ["main"]
