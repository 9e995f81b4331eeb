# Binding Descriptor module
