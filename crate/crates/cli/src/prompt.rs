use std::io::{BufRead, Write};

use scgnet::trainer::{RestartPolicy, Status};

/// Asks the user at each decision point of the training process. End of
/// input answers every question with its default.
pub struct Prompter<R, W> {
    input: R,
    output: W,
}

impl<R: BufRead, W: Write> Prompter<R, W> {
    pub fn new(input: R, output: W) -> Self {
        Self { input, output }
    }

    fn ask(&mut self, question: &str, default: bool) -> bool {
        let hint = if default { "[Y/n]" } else { "[y/N]" };
        loop {
            // a closed terminal falls back to the default answer
            if write!(self.output, "{question} {hint} ").and_then(|_| self.output.flush()).is_err() {
                return default;
            }
            let mut line = String::new();
            match self.input.read_line(&mut line) {
                Ok(0) | Err(_) => return default,
                Ok(_) => {}
            }
            match line.trim().to_ascii_lowercase().as_str() {
                "" => return default,
                "y" | "yes" => return true,
                "n" | "no" => return false,
                _ => {
                    let _ = writeln!(self.output, "please answer y or n");
                }
            }
        }
    }
}

impl<R: BufRead, W: Write> RestartPolicy for Prompter<R, W> {
    fn refine_reasonable(&mut self, s: &Status) -> bool {
        self.ask(
            &format!(
                "cold start {}: reasonable solution found (E={:e}). Search further with high-intensity annealing?",
                s.cold_start, s.error
            ),
            false,
        )
    }

    fn abandon_cold_start(&mut self, s: &Status) -> bool {
        self.ask(
            &format!(
                "cold start {}, round {}: slow progress (best E={:e}). Terminate this cold start?",
                s.cold_start, s.round, s.error
            ),
            false,
        )
    }

    fn another_cold_start(&mut self, s: &Status) -> bool {
        let question = format!(
            "cold start {} finished (best E={:e}, overall {:e}). Begin another cold start?",
            s.cold_start, s.error, s.global_error
        );
        self.ask(&question, !s.reasonable)
    }
}
