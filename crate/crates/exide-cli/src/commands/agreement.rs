//! Inter-annotator agreement over a headerless CSV: one row per item,
//! one column per rater. Categorical labels get Fleiss' kappa, numeric
//! ratings get an intraclass correlation.

use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args};

use exide_core::metrics::{
    fleiss_kappa, icc, CategoricalGrid, IccForm, RatingsMatrix,
};

use crate::error::CliError;

#[derive(Args, Debug)]
#[command(group = ArgGroup::new("input").required(true).args(["categorical", "ratings"]))]
pub struct AgreementArgs {
    /// CSV of categorical labels
    #[arg(long, value_name = "FILE")]
    pub categorical: Option<PathBuf>,
    /// CSV of numeric ratings
    #[arg(long, value_name = "FILE")]
    pub ratings: Option<PathBuf>,
    /// Intraclass correlation form for --ratings
    #[arg(long, value_name = "FORM", default_value = "average", value_parser = ["single", "average"])]
    pub icc_form: String,
}

pub fn exec(args: &AgreementArgs) -> Result<(), CliError> {
    if let Some(path) = &args.categorical {
        let rows = read_rows(path)?;
        let grid = CategoricalGrid::new(rows)?;
        let kappa = fleiss_kappa(&grid)?;
        println!("items: {}", grid.items());
        println!("raters: {}", grid.raters());
        println!("fleiss_kappa: {kappa}");
        return Ok(());
    }

    let path = args.ratings.as_ref().expect("clap enforces one input");
    let mut rows = Vec::new();
    for (index, row) in read_rows(path)?.into_iter().enumerate() {
        let mut numbers = Vec::with_capacity(row.len());
        for cell in row {
            let value: f64 = cell.parse().map_err(|_| {
                CliError::Run(format!(
                    "row {} of `{}` holds `{cell}`, which is not a number",
                    index + 1,
                    path.display()
                ))
            })?;
            numbers.push(value);
        }
        rows.push(numbers);
    }
    let matrix = RatingsMatrix::new(rows)?;
    let (form, name) = match args.icc_form.as_str() {
        "single" => (IccForm::TwoWayRandomSingle, "icc_single"),
        _ => (IccForm::TwoWayRandomAverage, "icc_average"),
    };
    let value = icc(&matrix, form)?;
    println!("subjects: {}", matrix.subjects());
    println!("raters: {}", matrix.raters());
    println!("{name}: {value}");
    Ok(())
}

fn read_rows(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("cannot read `{}`: {e}", path.display())))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            CliError::Run(format!("bad CSV in `{}`: {e}", path.display()))
        })?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(rows)
}
