//! Monthly radiance to period means, GDP rebasing and the three-way join.

use std::path::Path;

use regnl::ingest::{
    aggregate_to_period, join_records, read_centroids, read_deflators, read_gdp, read_radiance,
    rebase_gdp, write_dataset, Frequency,
};

const RADIANCE: &str = "\
region_id,year,month,mean_radiance
Ohio,2015,1,6.0
Ohio,2015,2,6.5
Ohio,2015,3,7.0
Ohio,2015,4,5.5
Ohio,2015,5,5.0
Nevada,2015,1,2.25
Nevada,2015,2,2.75
Nevada,2015,3,2.5
";

const GDP: &str = "\
region_id,year,period,nominal_gdp,base_year
Ohio,2015,Q1,640000,2015
Ohio,2015,Q2,652000,2015
Nevada,2015,Q1,150000,2015
Utah,2015,Q1,160000,2015
";

const CENTROIDS: &str = "\
region_id,latitude,longitude
Ohio,40.29,-82.79
Nevada,39.33,-116.63
";

const DEFLATORS: &str = "\
year,deflator_index
2011,100
2015,106.5
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let src = Path::new("<inline>");
    let radiance = read_radiance(RADIANCE.as_bytes(), src)?;
    let deflators = read_deflators(DEFLATORS.as_bytes(), src, 2011)?;
    let gdp = rebase_gdp(&read_gdp(GDP.as_bytes(), src)?, &deflators)?;
    let centroids = read_centroids(CENTROIDS.as_bytes(), src)?;

    let means = aggregate_to_period(&radiance, Frequency::Quarterly);
    for (key, m) in &means {
        println!(
            "{key}: {:.4} over {} months",
            m.mean_nightlight, m.months_observed
        );
    }

    // Ohio Q2 has two of three months and Utah has no radiance or centroid.
    let (records, coverage) = join_records(&means, &gdp, &centroids, false);
    println!("\n{}", serde_json::to_string_pretty(&coverage)?);

    println!();
    write_dataset(&records, std::io::stdout().lock())?;
    Ok(())
}
