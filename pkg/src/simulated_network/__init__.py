# Simulated Network module
