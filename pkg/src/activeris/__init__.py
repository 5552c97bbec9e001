"""Multi-active-RIS uplink simulator with closed-form beamforming and DRL resource allocation."""

__version__ = "0.1.0"
