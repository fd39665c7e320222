from .commands import EXIT_OK, EXIT_PARTIAL_FAILURE, handle_command, register_commands, resolve_out_dir

__all__ = ["EXIT_OK", "EXIT_PARTIAL_FAILURE", "handle_command", "register_commands", "resolve_out_dir"]
