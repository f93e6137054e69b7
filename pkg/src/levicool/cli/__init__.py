from .config import ConfigError, RunConfig, load, parse_text
from .main import main
