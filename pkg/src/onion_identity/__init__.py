# Onion Identity module
