//! Big-step evaluation with a fuel budget.

use super::{RecFun, RecFunError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalResult {
    Halted(Vec<u64>),
    /// The budget ran out; `consumed` is the whole budget.
    OutOfFuel { consumed: u64 },
}

impl EvalResult {
    pub fn halted(&self) -> Option<&[u64]> {
        match self {
            EvalResult::Halted(v) => Some(v),
            EvalResult::OutOfFuel { .. } => None,
        }
    }
}

impl std::fmt::Display for EvalResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvalResult::Halted(v) => {
                let parts: Vec<String> = v.iter().map(u64::to_string).collect();
                write!(f, "Halted({})", parts.join(","))
            }
            EvalResult::OutOfFuel { consumed } => write!(f, "OutOfFuel({consumed})"),
        }
    }
}

struct OutOfFuel;

struct Machine {
    fuel: u64,
}

impl Machine {
    fn tick(&mut self) -> Result<(), OutOfFuel> {
        if self.fuel == 0 {
            return Err(OutOfFuel);
        }
        self.fuel -= 1;
        Ok(())
    }

    fn scalar(&mut self, e: &RecFun, args: &[u64]) -> Result<u64, OutOfFuel> {
        let v = self.run(e, args)?;
        debug_assert_eq!(v.len(), 1);
        Ok(v[0])
    }

    fn run(&mut self, e: &RecFun, args: &[u64]) -> Result<Vec<u64>, OutOfFuel> {
        self.tick()?;
        match e {
            RecFun::S => Ok(vec![args[0].saturating_add(1)]),
            RecFun::Const(_) => Ok(vec![1]),
            RecFun::Proj(i, _) => Ok(vec![args[i - 1]]),
            RecFun::Comp(f, g) => {
                let mid = self.run(f, args)?;
                self.run(g, &mid)
            }
            RecFun::Bracket(fs) => {
                let mut out = Vec::new();
                for f in fs {
                    out.extend(self.run(f, args)?);
                }
                Ok(out)
            }
            RecFun::PrimRec(f, g) => {
                let (x, y) = args.split_at(args.len() - 1);
                let mut h = self.scalar(f, x)?;
                let mut buf = x.to_vec();
                for k in 1..y[0] {
                    buf.truncate(x.len());
                    buf.push(k);
                    buf.push(h);
                    h = self.scalar(g, &buf)?;
                }
                Ok(vec![h])
            }
            RecFun::KRec(fs, g) => {
                let (x, y) = args.split_at(args.len() - 1);
                let k = fs.len() as u64;
                let target = y[0];
                if target <= k {
                    return Ok(vec![self.scalar(&fs[(target - 1) as usize], x)?]);
                }
                // Sliding window of the last k values h(x, ℓ), …, h(x, ℓ+k−1).
                let mut window = Vec::with_capacity(fs.len());
                for f in fs {
                    window.push(self.scalar(f, x)?);
                }
                let mut buf = x.to_vec();
                for n in (k + 1)..=target {
                    buf.truncate(x.len());
                    buf.extend_from_slice(&window);
                    buf.push(n - 1);
                    let next = self.scalar(g, &buf)?;
                    window.remove(0);
                    window.push(next);
                }
                Ok(vec![*window.last().expect("k >= 1")])
            }
            RecFun::Mu(f) => {
                let mut buf = args.to_vec();
                buf.push(0);
                let mut y = 1u64;
                loop {
                    self.tick()?;
                    *buf.last_mut().expect("nonempty") = y;
                    if self.scalar(f, &buf)? == 1 {
                        return Ok(vec![y]);
                    }
                    y += 1;
                }
            }
            RecFun::Empty(..) => {
                self.fuel = 0;
                Err(OutOfFuel)
            }
        }
    }
}

/// Evaluates `e` on `args` spending at most `fuel` steps. One step is charged per syntax
/// node visited and one more per minimization probe.
pub fn evaluate(e: &RecFun, args: &[u64], fuel: u64) -> Result<EvalResult, RecFunError> {
    let (m, _) = e.signature()?;
    if args.len() != m {
        return Err(RecFunError::ArgumentCount { expected: m, got: args.len() });
    }
    if args.contains(&0) {
        return Err(RecFunError::ZeroArgument);
    }
    let mut machine = Machine { fuel };
    Ok(match machine.run(e, args) {
        Ok(v) => EvalResult::Halted(v),
        Err(OutOfFuel) => EvalResult::OutOfFuel { consumed: fuel },
    })
}

/// The totalization `f̄`: the value when evaluation halts within `fuel`, otherwise 0.
pub fn fbar(e: &RecFun, args: &[u64], fuel: u64) -> Result<u64, RecFunError> {
    let (_, n) = e.signature()?;
    if n != 1 {
        return Err(RecFunError::MultiOutput(n));
    }
    Ok(match evaluate(e, args, fuel)? {
        EvalResult::Halted(v) => v[0],
        EvalResult::OutOfFuel { .. } => 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn successor_and_addition() {
        assert_eq!(evaluate(&RecFun::S, &[4], 10), Ok(EvalResult::Halted(vec![5])));
        assert_eq!(
            evaluate(&RecFun::addition(), &[2, 3], 10_000),
            Ok(EvalResult::Halted(vec![5]))
        );
    }

    #[test]
    fn diverging_mu_runs_out_of_fuel() {
        let e = RecFun::mu(RecFun::comp(RecFun::Const(2), RecFun::S));
        assert_eq!(e.signature(), Ok((1, 1)));
        assert_eq!(
            evaluate(&e, &[7], 1000),
            Ok(EvalResult::OutOfFuel { consumed: 1000 })
        );
        assert_eq!(fbar(&e, &[7], 1000), Ok(0));
    }

    #[test]
    fn mu_finds_first_witness() {
        // f(x, y) = y, so the first y with f = 1 is y = 1.
        let e = RecFun::mu(RecFun::Proj(2, 2));
        assert_eq!(evaluate(&e, &[9], 100), Ok(EvalResult::Halted(vec![1])));
    }

    #[test]
    fn empty_never_halts() {
        let e = RecFun::Empty(1, 1);
        assert_eq!(evaluate(&e, &[1], 50), Ok(EvalResult::OutOfFuel { consumed: 50 }));
        assert_eq!(fbar(&e, &[1], 50), Ok(0));
    }

    #[test]
    fn argument_checks() {
        assert_eq!(
            evaluate(&RecFun::S, &[1, 2], 10),
            Err(RecFunError::ArgumentCount { expected: 1, got: 2 })
        );
        assert_eq!(evaluate(&RecFun::S, &[0], 10), Err(RecFunError::ZeroArgument));
    }

    #[test]
    fn k_rec_with_two_initial_conditions_is_fibonacci_like() {
        // h(x,1)=1, h(x,2)=1, h(x,n)=h(x,n-2)+h(x,n-1) using g(x,a,b,i) = a+b.
        let add_ab = RecFun::comp(
            RecFun::Bracket(vec![RecFun::Proj(2, 4), RecFun::Proj(3, 4)]),
            RecFun::addition(),
        );
        let e = RecFun::k_rec(vec![RecFun::Const(1), RecFun::Const(1)], add_ab);
        let fib: Vec<u64> = (1..=7)
            .map(|n| evaluate(&e, &[1, n], 100_000).unwrap().halted().unwrap()[0])
            .collect();
        assert_eq!(fib, vec![1, 1, 2, 3, 5, 8, 13]);
    }
}
