# Output Processor module
