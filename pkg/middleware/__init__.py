# Command-line error handling
