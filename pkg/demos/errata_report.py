"""Print each reference formula that fails numerically with its replacement."""
from poisson_forge.errata import all_entries

for entry in all_entries():
    mark = "confirmed" if entry.confirmed else "NOT confirmed"
    print(f"[{mark}] {entry.key}: {entry.topic}")
    print(f"    printed:     {entry.reference_form}")
    print(f"    implemented: {entry.implemented_form}")
    for k, v in entry.evidence.items():
        print(f"    {k} = {v}")
