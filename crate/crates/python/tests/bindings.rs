use pyo3::prelude::*;
use pyo3::types::{PyDict, PyModule};

fn with_module<F: FnOnce(Python<'_>, &Bound<'_, PyDict>)>(f: F) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "mobss_py").unwrap();
        mobss_py::register(&m).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("m", m).unwrap();
        f(py, &globals);
    });
}

fn eval<'py>(py: Python<'py>, g: &Bound<'py, PyDict>, code: &str) -> Bound<'py, PyAny> {
    let code = std::ffi::CString::new(code).unwrap();
    py.eval(&code, Some(g), None).unwrap()
}

#[test]
fn criteria_and_baselines_round_trip_through_python() {
    with_module(|py, g| {
        let sir: f64 = eval(py, g, "m.sir([1.0, 2.0, 3.0, 4.0], [2.0, 4.0, 6.0, 8.0])").extract().unwrap();
        assert_eq!(sir, f64::INFINITY);
        let w: Vec<Vec<f64>> = eval(
            py,
            g,
            "m.mse_solution(m.synthetic_pair(4096, 1), m.mix(m.synthetic_pair(4096, 1), [[1.0, 0.5], [0.5, 1.0]]))",
        )
        .extract()
        .unwrap();
        let inv = [[4.0 / 3.0, -2.0 / 3.0], [-2.0 / 3.0, 4.0 / 3.0]];
        for (r, e) in w.iter().zip(inv) {
            for (a, b) in r.iter().zip(e) {
                assert!((a - b).abs() < 1e-8);
            }
        }
        let (values, penalized): (Vec<f64>, bool) =
            eval(py, g, "m.objectives([[1.0, 0.0], [0.0, 1.0]], [[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 1.0, 0.0]], 1)")
                .extract()
                .unwrap();
        assert_eq!(values.len(), 2);
        assert!(penalized || values[0] <= 0.0);
    });
}

#[test]
fn invalid_input_raises_value_error() {
    with_module(|py, g| {
        let code = std::ffi::CString::new("m.RunConfig.from_json('{}x')").unwrap();
        let err = py.eval(&code, Some(g), None).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
        let code = std::ffi::CString::new("m.separate([[1.0, 2.0]], [[1.0, 0.0], [0.0, 1.0]])").unwrap();
        assert!(py.eval(&code, Some(g), None).is_err());
    });
}

#[test]
fn run_and_evaluate_from_python() {
    with_module(|py, g| {
        eval(py, g, "globals().update(a=m.run(seed=5))");
        let n: usize = eval(py, g, "len(a)").extract().unwrap();
        assert!(n > 0 && n <= 50);
        let tau: Option<usize> = eval(py, g, "a.detected_tau").extract().unwrap();
        assert_eq!(tau, Some(193));
        let same: bool = eval(py, g, "m.RunArtifact.from_json(a.to_json()).to_json() == a.to_json()")
            .extract()
            .unwrap();
        assert!(same);
        let ok: bool = eval(py, g, "(lambda r: r.mse_mean >= max(r.mean_sir) - 1e-9)(m.evaluate(a))")
            .extract()
            .unwrap();
        assert!(ok);
    });
}
