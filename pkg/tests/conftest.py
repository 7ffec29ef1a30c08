import sys
from pathlib import Path

# test-local helper modules (oracles shared across files)
sys.path.insert(0, str(Path(__file__).parent))
