# cornersim/main.py

from interface.cli import app

if __name__ == "__main__":
    app()
