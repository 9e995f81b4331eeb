# Command Line module
