"""
Write the bundled degree-36 coefficient file.

Degrees 2 to 4 carry the published EGM2008 values (tide-free, fully
normalised); degrees 5 to 36 are drawn from a seeded Gaussian with the
Kaula power law sd = 1e-5 / n^2, so the field has a realistic spectrum
without shipping a large model. Run from the repository root.
"""

import numpy as np

from gnss_subsidence.geopotential import DEFAULT_GM, DEFAULT_RADIUS, GeopotentialModel
from gnss_subsidence.ingest import write_gfc

N = 36
EGM2008_LOW = {
    (2, 0): (-0.484165143790815e-03, 0.0),
    (2, 1): (-0.206615509074176e-09, 0.138441389137979e-08),
    (2, 2): (0.243938357328313e-05, -0.140027370385934e-05),
    (3, 0): (0.957161207093473e-06, 0.0),
    (3, 1): (0.203046201047864e-05, 0.248200415856872e-06),
    (3, 2): (0.904787894809528e-06, -0.619005475177618e-06),
    (3, 3): (0.721321757121568e-06, 0.141434926192941e-05),
    (4, 0): (0.539965866638991e-06, 0.0),
    (4, 1): (-0.536157389388867e-06, -0.473567346518086e-06),
    (4, 2): (0.350501623962649e-06, 0.662480026275829e-06),
    (4, 3): (0.990856766672321e-06, -0.200956723567452e-06),
    (4, 4): (-0.188519633023033e-06, 0.308803882149194e-06),
}


def main(path="src/gnss_subsidence/data/egm2008_low_kaula36.gfc"):
    rng = np.random.default_rng(2008)
    c = np.zeros((N + 1, N + 1))
    s = np.zeros((N + 1, N + 1))
    c[0, 0] = 1.0
    for n in range(5, N + 1):
        sd = 1e-5 / n**2
        c[n, : n + 1] = sd * rng.standard_normal(n + 1)
        s[n, 1 : n + 1] = sd * rng.standard_normal(n)
    for (n, m), (cv, sv) in EGM2008_LOW.items():
        c[n, m], s[n, m] = cv, sv
    model = GeopotentialModel(c, s, DEFAULT_GM, DEFAULT_RADIUS, name="egm2008_low_kaula36")
    write_gfc(model, path)


if __name__ == "__main__":
    main()
