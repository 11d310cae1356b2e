#!/usr/bin/env python3
"""
FairForge - Main Entry Point

Fairness evaluation and bias-aware pruning for binary forgery detectors.

Usage:
    python main.py eval records.jsonl --threshold 0.5 --format markdown
    python main.py thresholds records.jsonl --out plan.json
    python main.py prune model.ftm calib/ --method bpfa --rate 0.01 --out pruned.ftm
    python main.py sweep model.ftm calib/ eval/ --methods bpfa,weig --format csv
    python main.py synth data/specs/table6.json --out table.jsonl
    python main.py render a.json b.json --format markdown

Requirements:
    pip install -r requirements.txt

For more information, see README.md
"""
import logging
import sys
from pathlib import Path

# Add current directory to path for imports
current_dir = Path(__file__).parent
sys.path.insert(0, str(current_dir))

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Logs go to stderr; stdout carries only rendered reports
logging.basicConfig(
    level=logging.INFO,
    format=LOG_FORMAT,
    handlers=[
        logging.StreamHandler(sys.stderr)
    ]
)

logger = logging.getLogger(__name__)


def check_dependencies():
    """Check if required dependencies are installed."""
    required_modules = [
        ('numpy', 'numpy'),
        ('scipy', 'scipy'),
        ('rich', 'rich'),
        ('typer', 'typer'),
        ('yaml', 'PyYAML'),  # PyYAML imports as 'yaml'
    ]

    missing_modules = []

    for import_name, package_name in required_modules:
        try:
            __import__(import_name)
        except ImportError:
            missing_modules.append(package_name)

    if missing_modules:
        print("❌ Missing required dependencies:", file=sys.stderr)
        for module in missing_modules:
            print(f"   • {module}", file=sys.stderr)

        print("\n💡 Install with:", file=sys.stderr)
        print(f"   pip install {' '.join(missing_modules)}", file=sys.stderr)
        print("\n   Or install all requirements:", file=sys.stderr)
        print("   pip install -r requirements.txt", file=sys.stderr)
        return False

    return True


def setup_file_logging():
    """Apply configured log level and add the log file handler."""
    from core.config import Config

    config = Config()
    logging.getLogger().setLevel(getattr(logging, config.log_level, logging.INFO))

    try:
        config.log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(config.log_file, encoding='utf-8')
    except OSError as e:
        logger.warning(f"File logging disabled: {e}")
        return

    file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logging.getLogger().addHandler(file_handler)


def main():
    """Main entry point for FairForge."""
    if not check_dependencies():
        return 1

    setup_file_logging()

    try:
        from cli.app import main as run_cli

        return run_cli(sys.argv[1:])

    except KeyboardInterrupt:
        print("\n👋 FairForge stopped by user", file=sys.stderr)
        return 130
    except Exception as e:
        logger.error(f"Unexpected error in main: {e}")
        print(f"\n❌ An unexpected error occurred: {e}", file=sys.stderr)
        print("Check logs/fairforge.log for details", file=sys.stderr)
        return 1


if __name__ == "__main__":
    exit_code = main()
    sys.exit(exit_code)
