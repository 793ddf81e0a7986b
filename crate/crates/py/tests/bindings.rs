use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module(code: &str) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "flatspace").unwrap();
        flatspace_py::register(&m).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("flatspace", m).unwrap();
        let code = std::ffi::CString::new(code).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            panic!("{e}");
        }
    });
}

#[test]
fn assignment_and_transport() {
    with_module(
        "perm, cost = flatspace.solve_assignment([[4.0, 1.0], [2.0, 8.0]])\n\
         assert perm == [1, 0] and cost == 3.0\n\
         w = flatspace.w2_discrete([[0.0], [1.0]], [0.5, 0.5], [[0.0]], [1.0])\n\
         assert abs(w - 0.5 ** 0.5) < 1e-12\n",
    );
}

#[test]
fn group_round_trips() {
    with_module(
        "g = flatspace.Group.su2(2.0)\n\
         a = g.random(1, 7)[0]\n\
         back = g.embed_inverse(g.embed(a))\n\
         assert g.distance(a, back) < 1e-9\n\
         assert flatspace.Group.from_json(g.to_json()).to_json() == g.to_json()\n\
         elements, mesh = flatspace.Group.circle().net(8)\n\
         assert len(elements) == 8 and mesh > 0\n",
    );
}

#[test]
fn errors_surface_as_value_errors() {
    with_module(
        "try:\n    flatspace.markov_ratio([0.5, 0.5], [[0.5, 0.4], [0.5, 0.5]], [[0, 1], [1, 0]], 1)\n\
         except ValueError as e:\n    assert 'row 0' in str(e)\n\
         else:\n    raise AssertionError\n\
         try:\n    flatspace.run_pipeline('{\"group\": {\"kind\": \"su2\"}, \"depth\": 1, \"nets\": [4]}', [[1, 0, 0, 0]])\n\
         except flatspace.FlatspaceError as e:\n    assert 'even' in str(e), e\n\
         else:\n    raise AssertionError\n",
    );
}
