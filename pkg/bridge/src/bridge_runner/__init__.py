from .runner import BridgeResult, execute_script

__all__ = ["BridgeResult", "execute_script"]
