import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

_SRC_ROOT = Path(__file__).resolve().parent.parent


class Settings:
    def __init__(self):
        # App Configuration
        self.app_name = os.getenv("APP_NAME", "p-adic L-function Workbench")
        self.debug = os.getenv("DEBUG", "False").lower() == "true"
        self.log_level = os.getenv("LOG_LEVEL", "INFO")

        # Arithmetic Configuration
        self.padic_precision = int(os.getenv("PADIC_PRECISION", "30"))
        self.tail_tolerance = float(os.getenv("TAIL_TOLERANCE", "1e-12"))

        # Numerical Integration
        self.quad_epsrel = float(os.getenv("QUAD_EPSREL", "1e-12"))
        self.quad_limit = int(os.getenv("QUAD_LIMIT", "400"))
        self.bessel_series_radius = float(os.getenv("BESSEL_SERIES_RADIUS", "2.0"))
        self.bessel_asymptotic_radius = float(os.getenv("BESSEL_ASYMPTOTIC_RADIUS", "20.0"))
        self.real_whittaker_constant = float(os.getenv("REAL_WHITTAKER_CONSTANT", "2.0"))

        # Global Measure Configuration
        self.coeff_truncation = int(os.getenv("COEFF_TRUNCATION", "5000"))

        # Campaign Configuration
        self.campaign_seed = int(os.getenv("CAMPAIGN_SEED", "20240101"))
        self.campaign_jobs = int(os.getenv("CAMPAIGN_JOBS", "4"))
        self.data_dir = Path(os.getenv("DATA_DIR", str(_SRC_ROOT / "data" / "raw")))
        self.campaign_config = Path(
            os.getenv("CAMPAIGN_CONFIG", str(_SRC_ROOT / "config" / "campaign.cfg"))
        )
        self.report_dir = Path(os.getenv("REPORT_DIR", str(_SRC_ROOT.parent / "data" / "reports")))

settings = Settings()
