use pyo3::prelude::*;
use pyo3::types::PyDict;

#[test]
fn bounds_and_certificates_from_python() {
    Python::attach(|py| -> PyResult<()> {
        let m = PyModule::new(py, "isofold_py")?;
        isofold_py::isofold_py(&m)?;
        let locals = PyDict::new(py);
        locals.set_item("iso", m)?;
        let code = c"
from fractions import Fraction
tet = iso.Graph.platonic('tetrahedron')
cube = iso.Graph.platonic('cube')
lb = iso.lower_bound(tet, cube)
ok = lb['value'] == Fraction(7, 3) and not lb['strict']
verdict, cert = iso.solve(tet, tet, alpha=1)
ok = ok and verdict == 'feasible' and cert.verify()['accepted'] and cert.scale == 1
ok = ok and iso.Certificate.parse(tet, tet, cert.to_text()).to_text() == cert.to_text()
try:
    iso.Graph.platonic('prism')
    ok = False
except ValueError:
    pass
";
        py.run(code, None, Some(&locals))?;
        assert!(locals.get_item("ok")?.unwrap().extract::<bool>()?);
        Ok(())
    })
    .unwrap();
}
