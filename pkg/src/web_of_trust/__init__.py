# Web of Trust module
