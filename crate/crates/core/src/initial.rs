//! Initial densities from expressions, CSV files or seeded random fields.

use evalexpr::{
    build_operator_tree, ContextWithMutableFunctions, ContextWithMutableVariables, DefaultNumericTypes, Function,
    HashMapContext, Node, Value,
};
use std::path::Path;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{ModelParameters, Side, Species};
use crate::resolvent::seeded_field;
use crate::simulator::{field_name, FieldState};
use crate::snapshot::{field_order, read_fields_csv};

/// A compiled expression in `x` and `y`.
pub struct Expression {
    source: String,
    tree: Node<DefaultNumericTypes>,
    context: HashMapContext<DefaultNumericTypes>,
}

fn unary(f: fn(f64) -> f64) -> Function<DefaultNumericTypes> {
    Function::new(move |v: &Value<DefaultNumericTypes>| Ok(Value::Float(f(v.as_number()?))))
}

impl Expression {
    pub fn parse(source: &str, params: &ModelParameters) -> Result<Self> {
        let tree = build_operator_tree::<DefaultNumericTypes>(source)
            .map_err(|e| Error::Config(format!("expression `{source}`: {e}")))?;
        let mut context = HashMapContext::<DefaultNumericTypes>::new();
        let set = |c: &mut HashMapContext<DefaultNumericTypes>, k: &str, v: f64| {
            c.set_value(k.into(), Value::Float(v)).expect("hash map contexts are mutable")
        };
        set(&mut context, "pi", std::f64::consts::PI);
        set(&mut context, "ell", params.ell);
        set(&mut context, "L", params.width_s);
        for (name, f) in [
            ("sin", f64::sin as fn(f64) -> f64),
            ("cos", f64::cos),
            ("exp", f64::exp),
            ("sqrt", f64::sqrt),
            ("tanh", f64::tanh),
        ] {
            context.set_function(name.into(), unary(f)).expect("hash map contexts are mutable");
        }
        let mut e = Self { source: source.to_string(), tree, context };
        e.eval(0.0, 0.5)?;
        Ok(e)
    }

    pub fn eval(&mut self, x: f64, y: f64) -> Result<f64> {
        self.context.set_value("x".into(), Value::Float(x)).expect("hash map contexts are mutable");
        self.context.set_value("y".into(), Value::Float(y)).expect("hash map contexts are mutable");
        self.tree
            .eval_number_with_context(&self.context)
            .map_err(|e| Error::Config(format!("expression `{}`: {e}", self.source)))
    }
}

/// Zero every node on the outer boundary of both habitats.
pub fn enforce_dirichlet(state: &mut FieldState) {
    for pair in &mut state.fields {
        for g in [&mut pair.infected, &mut pair.susceptible] {
            let outer = g.outer_index();
            g.row_mut(outer).fill(0.0);
            let ny = g.ny;
            for i in 0..=g.nx {
                g.set(i, 0, 0.0);
                g.set(i, ny, 0.0);
            }
        }
    }
}

/// Evaluate the six expressions `[J_I, A_I, H_I, J_S, A_S, H_S]`.
pub fn from_expressions(exprs: [&str; 6], params: &ModelParameters, grid: &Grid) -> Result<FieldState> {
    let mut state = FieldState::zeros(grid);
    for ((species, side), src) in field_order().into_iter().zip(exprs) {
        let mut e = Expression::parse(src, params)?;
        let pair = &mut state.fields[species.index()];
        let g = match side {
            Side::Infected => &mut pair.infected,
            Side::Susceptible => &mut pair.susceptible,
        };
        for i in 0..=g.nx {
            for j in 0..=g.ny {
                let v = e.eval(g.x(i), g.y(j))?;
                if !v.is_finite() {
                    return Err(Error::Config(format!(
                        "{}: expression is not finite at ({}, {})",
                        field_name(species, side),
                        g.x(i),
                        g.y(j)
                    )));
                }
                g.set(i, j, v);
            }
        }
    }
    enforce_dirichlet(&mut state);
    Ok(state)
}

/// Seeded smooth random densities, one independent draw per species.
pub fn random_state(grid: &Grid, seed: u64) -> FieldState {
    let mut state = FieldState::zeros(grid);
    for s in Species::ALL {
        state.fields[s.index()] = seeded_field(grid, seed.wrapping_add(s.index() as u64)).map(|z| z.re);
    }
    enforce_dirichlet(&mut state);
    state
}

/// Initial state for `simulate`; relative CSV paths resolve against `base`.
pub fn initial_state(cfg: &Config, base: &Path) -> Result<FieldState> {
    let grid = cfg.run_config().grid(&cfg.model);
    if let Some(path) = &cfg.ic.csv {
        let text = std::fs::read_to_string(base.join(path))?;
        let mut s = read_fields_csv(&text, &grid)?;
        s.t = 0.0;
        enforce_dirichlet(&mut s);
        return Ok(s);
    }
    if let Some(seed) = cfg.ic.random {
        return Ok(random_state(&grid, seed));
    }
    from_expressions(cfg.ic.expressions(), &cfg.model, &grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expressions_evaluate_with_constants() {
        let p = ModelParameters::example();
        let mut e = Expression::parse("2 * sin(pi * y) * exp(-x) + L", &p).unwrap();
        let v = e.eval(0.5, 0.25).unwrap();
        let expect = 2.0 * (std::f64::consts::PI * 0.25).sin() * (-0.5f64).exp() + 1.0;
        assert!((v - expect).abs() < 1e-15);
        assert_eq!(Expression::parse("0", &p).unwrap().eval(1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn bad_expressions_are_config_errors() {
        let p = ModelParameters::example();
        assert!(matches!(Expression::parse("sin(", &p), Err(Error::Config(_))));
        assert!(matches!(Expression::parse("z + 1", &p), Err(Error::Config(_))));
    }

    #[test]
    fn states_vanish_on_the_outer_boundary() {
        let p = ModelParameters::example();
        let grid = Grid::new(&p, 16, 16, 16);
        let s = from_expressions(["1"; 6], &p, &grid).unwrap();
        for pair in &s.fields {
            assert_eq!(pair.infected.dirichlet_defect(), 0.0);
            assert_eq!(pair.susceptible.dirichlet_defect(), 0.0);
            assert_eq!(pair.infected.at(16, 8), 1.0);
        }
        let r = random_state(&grid, 3);
        assert_eq!(r, random_state(&grid, 3));
        assert_eq!(r.fields[0].susceptible.dirichlet_defect(), 0.0);
    }
}
