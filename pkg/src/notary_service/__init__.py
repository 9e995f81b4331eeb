# Notary Service module
