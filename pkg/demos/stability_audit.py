"""Critical points of Example I under both Poisson structures.

Both structures describe the same flow, so the linearization and the
eigenvalues agree. The slope of the Casimir along the critical curve flips
sign between them, which is why a slope-based stability test cannot be
structure independent.
"""
from poisson_forge.systems import make_system
from poisson_forge.verification import stability_audit, stability_table

sysd = make_system("example1")
tables = [stability_table(sysd, label, (0.5, 1.0, 2.0)) for label in ("pois1", "pois2")]
for table in tables:
    print(f"structure {table['structure']}: {table['relation']}")
    for row in table["rows"]:
        print(f"  multiplier {row['multiplier']:4.1f}  mu^2 {row['mu_squared']:+9.4f}  "
              f"dPsi {row['casimir_slope']:+8.4f}  {row['classification']}")
print("opposite verdicts:", stability_audit(tables)["opposite"])
