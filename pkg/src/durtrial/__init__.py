"""Duration-response trial design simulation."""
