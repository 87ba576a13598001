"""
Pytest configuration and shared fixtures
Handles path setup and common test utilities
"""

import pytest
import random
import sys
import os
from pathlib import Path
from dotenv import load_dotenv

# Setup paths for testing
project_root = Path(__file__).parent.parent
src_path = project_root / 'src'
env_path = project_root / '.env'

# Add src to Python path
sys.path.insert(0, str(src_path))

# Load environment variables
load_dotenv(env_path)

# Change working directory to src for relative data paths
os.chdir(src_path)


@pytest.fixture(scope="session")
def project_paths():
    """Provide project paths for tests"""
    return {
        'project_root': project_root,
        'src_path': src_path,
        'raw_data': src_path / 'data' / 'raw',
        'campaign_cfg': src_path / 'config' / 'campaign.cfg',
        'env_path': env_path
    }


@pytest.fixture(scope="session")
def curve_11a():
    """Builtin model of the conductor 11 curve"""
    from models.global_q import get_curve
    return get_curve("11a")


@pytest.fixture(scope="session")
def coeffs_11a(curve_11a):
    """a_n of 11a up to 2000 from point counts"""
    from models.global_q import coeffs_from_curve
    return coeffs_from_curve(curve_11a, 2000)


@pytest.fixture
def rng():
    """Seeded generator so property loops are reproducible"""
    return random.Random(1234)


@pytest.fixture
def Q5():
    from models.padic_core import field
    return field(5, 1, 20)


@pytest.fixture
def F9():
    from models.padic_core import field
    return field(3, 2, 20)
