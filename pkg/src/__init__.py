"""
dualweb - Audience vs. Hyperlink Networks of Websites
"""

__version__ = "0.1.0"
