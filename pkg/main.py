# main.py
import os
import sys

# Agregar la raíz del proyecto al path
current_dir = os.path.dirname(os.path.abspath(__file__))
if current_dir not in sys.path:
    sys.path.insert(0, current_dir)

from src.presentation.cli import app  # noqa: E402


if __name__ == "__main__":
    app()
